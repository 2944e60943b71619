"""Regression constants from scripts/freeze_constants.py (10 significant digits)."""
Q0 = 2.391956403
L2SQ = 15.50158633
GRADSQ = 15.50158633
A0_SIGMA1 = 0.008063690862
