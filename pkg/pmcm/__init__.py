# Numerical laboratory for the prescribed mean curvature measure equation

__version__ = "0.1.0"
