"""Physical constants shared across the simulator.

All values are SI. They are fixed here rather than configurable because
every published number we reproduce assumes the same conventions.
"""

MU_EARTH = 3.986004418e14  # gravitational parameter [m^3/s^2]
R_EARTH = 6_371_000.0      # mean Earth radius, spherical model [m]
SIDEREAL_DAY = 86_164.0905  # Earth rotation period [s]
C_LIGHT = 3.0e8            # signal propagation speed in vacuum [m/s]

# Floor for received power when multipath components cancel exactly,
# keeps downstream dB arithmetic finite.
POWER_FLOOR_DBM = -400.0
