# Sweep layer: configuration, presets, runner, tables
