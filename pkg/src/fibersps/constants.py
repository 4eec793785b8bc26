"""Physical constants (CODATA 2018 exact values, SI units)."""

# Planck constant (J s)
PLANCK_H = 6.62607015e-34

# Speed of light in vacuum (m/s)
SPEED_OF_LIGHT = 299792458.0
