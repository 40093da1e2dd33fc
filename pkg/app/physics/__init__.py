# Physics layer: units, driving field, model potential, quantum dynamics
