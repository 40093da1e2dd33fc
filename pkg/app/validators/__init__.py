# Post-run diagnostics for sweep points
