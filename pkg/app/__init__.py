# Optical field emission toolkit
__version__ = "1.0.0"
