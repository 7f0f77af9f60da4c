# Eikonal and Burgers diagnostics laboratory
__version__ = "0.1.0"
