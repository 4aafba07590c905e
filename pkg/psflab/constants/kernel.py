# Sample grid for phi: [0, GRID_MAX] with step 2**-GRID_LOG2_INV_STEP.
GRID_MAX = 64.0
GRID_LOG2_INV_STEP = 10
# Composite Gauss-Legendre rule for the cosine transform over the transition band.
TRANSFORM_PANELS = 64
TRANSFORM_NODES = 16
TRANSFORM_CHUNK = 4096
SPLINE_DEGREE = 5
# Mirror points added left of 0 so the spline sees phi as even.
SPLINE_MIRROR = 16

VALIDATED_DECAY_ORDERS = (0, 1, 2, 4, 6, 8)
DECAY_HEADROOM = 1.1
TAIL_ORDER = 8
