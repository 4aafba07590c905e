DEFAULT_SEED = 0
DEFAULT_TOL = 1e-10
DEFAULT_THREADS = 4

# StepSpec construction.
MAX_DELTA_RATIO = 8.0
EVAL_F_TOL = 1e-12

# Empirical constants (multiplicative slack) for the coefficient-sum bounds.
SBP_BOUND_CONSTANTS = {1: 4.0, 2: 4.0, 3: 4.0}
SBP_STABILITY_BAND = 1.2
DIRICHLET_TAIL_CONSTANT = 16.0
DIRICHLET_STABILITY_BAND = 0.3
DIRICHLET_SLOPE_TOL = 0.15
HARDY_LITTLEWOOD_BAND = 10.0
EMBEDDING_CONSTANT = 50.0
SBP2_CROSS_FACTOR = 4.0

# Random bound suite.
RANDOM_SPEC_MAX_N = 128
RANDOM_SPEC_MAX_DELTA = 1024.0
RANDOM_SPEC_B_RANGE = (0.25, 3.9)

# Growth diagnostics.
FLAT_SLOPE = 0.05
SPIKE_BAND = 0.02
SPIKE_FLOOR = 8
MONOTONE_NOISE_FLOOR = 1e-9

# Diagonal schedule.
SCHEDULE_CAP = 10**7
SCHEDULE_RATE = 1.0

# Sign search.
DEFAULT_TRIALS = 256
EXHAUSTIVE_MAX_LEN = 20
GREEDY_POLISH = 8
KHINTCHINE_SLACK = 0.1
SALEM_ZYGMUND_RATIO = 4.0

# Weights checker.
GROWTH_THRESHOLD = 0.05
WEIGHT_TAIL_CUTOFF = 1e-14
