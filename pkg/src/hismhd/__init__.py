"""Pseudo-spectral simulator and verification harness for incompressible
fractional MHD with Hall and ion-slip effects on a 3D periodic box."""

__version__ = "0.1.0"
