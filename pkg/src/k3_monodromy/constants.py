"""Constants for k3 monodromy computations."""

# Random rational draws: numerator and denominator in [-RATIONAL_BOUND, RATIONAL_BOUND] \ {0}
RATIONAL_BOUND = 999

# Local rings
COLENGTH_INITIAL_TRUNC = 8
COLENGTH_TRUNC_GROWTH = 2
COLENGTH_TRUNC_CAP = 64
EMBEDDING_VERIFY_MAX_N = 5
EMBEDDING_VERIFY_SAMPLES = 3
MAX_REDRAWS = 20

# Path tracking
NEWTON_TOL = 1e-12
CORRECTOR_TOL = 1e-9
MAX_NEWTON_ITERS = 6
INITIAL_STEP = 0.05
MIN_STEP = 1e-8
MAX_STEP = 0.1
STEP_GROW = 1.5
STEP_SHRINK = 0.5
SUCCESS_RESIDUAL = 1e-10
SHARPEN_ITERS = 3
INFINITY_NORM = 1e8
DEDUPE_TOL = 1e-6
MAX_FAILURE_FRACTION = 0.05
SUSPECT_CONDITION = 1e8
GROW_AFTER_SUCCESSES = 3

# Monodromy
MATCH_TOL = 1e-6
LOOP_RADIUS = 0.3
LOOP_MIN_VERTICES = 4
LOOP_MAX_VERTICES = 8
BISECT_TOL = 1e-8
PENCIL_SAMPLES = 48
HUNT_RETRIES = 4
FILL_STALL_LIMIT = 12
FILL_CONFIRM_LOOPS = 3
CHART_RETRIES = 3
CIRCLE_VERTICES = 16
ORDER_STABLE_WINDOW = 10
CHART_CONDITION_MAX = 1e3
PERTURB_SCALE = 1e-2
RETRACK_ATTEMPTS = 2
MATCH_TOL_SHRINK = 10.0
LINE_RESIDUAL_TOL = 1e-8
HUNT_RADIUS = 1e-3
HUNT_CANDIDATES = 6
ISOLATION_RATIO = 2.0
SECANT_ITERS = 40
SECANT_PROBE = 1e-3
COLLISION_REACH = 0.5

# Permutation groups
WORD_BUDGET = 2000
SCHREIER_SIMS_MAX_DEGREE = 64

# JSON integers above this are written as decimal strings
JSON_SAFE_INT = 2**53
