# Core configuration, errors and shared numerics
