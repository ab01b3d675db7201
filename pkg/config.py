"""
Configuration file for the stationary scattering inversion toolkit
Contains numerical defaults, file-format constants and logging settings
"""
import math

# Neumann Series Configuration
NEUMANN_TOL = 1e-10
NEUMANN_MAX_ITER = 200
CONTRACTION_TAIL = 3

# Resolvent Configuration
# eps = EPSILON_FACTOR * lambda * (2*pi/L), one frequency-spacing width
EPSILON_FACTOR = 1.0

# Propagator Configuration
MAX_POTENTIAL_PHASE = 0.1
MAX_KINETIC_PHASE = math.pi / 4

# Grid Configuration
MIN_POINTS = 16
SUPPORTED_DIMENSIONS = (2, 3)
SUPPORT_TOLERANCE = 1e-12

# Norm Configuration
X_NORM_LEVELS = 16

# Reconstruction Configuration
BAND_FACTOR = 0.9
BIAS_C1 = 1.0
BIAS_C2 = 1.0

# Field File Configuration
CFLD_MAGIC = b"CFLD"
CFLD_VERSION = 1

# Report Configuration
FLOAT_FORMAT = "{:.17g}"
MANIFEST_NAME = "manifest.csv"

# Logging Configuration
LOG_LEVEL = "INFO"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_DIR = "logs"
