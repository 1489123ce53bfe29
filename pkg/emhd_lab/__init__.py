"""
EMHD Lab - electron-MHD simulations on the periodic box

Pseudo-spectral solver for the 2.5D electron-MHD system written in the
scalar potentials (a, b), with Littlewood-Paley diagnostics: dissipation
wavenumbers, regularity monitors, low-mode synchronization, radial
cancellation checks and dyadic scaling.
"""

__version__ = "0.1.0"
__author__ = "EMHD Lab Developers"
