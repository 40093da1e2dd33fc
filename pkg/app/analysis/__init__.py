# Analysis layer: emission observables, Fowler-Nordheim model, autocorrelation
