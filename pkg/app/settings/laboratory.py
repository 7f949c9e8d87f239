from environs import Env
import logging

logger = logging.getLogger(__name__)

env = Env()
env.read_env()

# Root finding
ROOT_TOL = env.float("ROOT_TOL", 1e-12)
BISECTION_MAX_ITER = env.int("BISECTION_MAX_ITER", 200)

# Spectral radius
EIGEN_TOL = env.float("EIGEN_TOL", 1e-10)
POWER_ITERATION_CAP = env.int("POWER_ITERATION_CAP", 100_000)
POWER_ITERATION_SHIFT = env.float("POWER_ITERATION_SHIFT", 0.1)

JACOBIAN_STEP = env.float("JACOBIAN_STEP", 1e-5)

# Verdicts
VERDICT_MARGIN = env.float("VERDICT_MARGIN", 1e-3)
TAIL_WINDOW_FRACTION = env.float("TAIL_WINDOW_FRACTION", 0.25)
INDETERMINATE_SPREAD = env.float("INDETERMINATE_SPREAD", 1e-2)
NECESSITY_MARGIN = env.float("NECESSITY_MARGIN", 1e-9)
RELEVANCE_FLOOR = env.float("RELEVANCE_FLOOR", 1e-3)

# Equilibrium solvers
AGREE_TOL = env.float("AGREE_TOL", 1e-6)
DEFAULT_TERMINALS = env.int("DEFAULT_TERMINALS", 3)
DETREND_LOG_THRESHOLD = env.float("DETREND_LOG_THRESHOLD", 600.0)
CUTOFF_GRID_POINTS = env.int("CUTOFF_GRID_POINTS", 64)
CAPITAL_BRACKET_CAP = env.float("CAPITAL_BRACKET_CAP", 1e12)
SHOOTING_TOL = env.float("SHOOTING_TOL", 1e-15)
STEADY_STATE_NEIGHBOURHOOD = env.float("STEADY_STATE_NEIGHBOURHOOD", 0.1)
SHOOTING_HORIZON_FACTOR = env.int("SHOOTING_HORIZON_FACTOR", 4)

if not 0 < TAIL_WINDOW_FRACTION <= 1:
    logger.warning(
        f"TAIL_WINDOW_FRACTION={TAIL_WINDOW_FRACTION} is outside (0, 1]; verdicts will use the whole horizon."
    )
