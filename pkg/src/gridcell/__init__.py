"""Two-timescale scheduling, sleeping and beamforming simulator for
grid-powered small-cell networks."""

from .config import (
    DriftConstants,
    SystemConfig,
    circuit_power,
    drift_constants,
    load_config,
    validate_config,
)
from .channel import ChannelRealization, sample_channels
from .queues import QueueState, arrival, frame_totals, step_access, step_processing
from .scheduler import (
    FrameRecord,
    LyapunovRecord,
    ScheduleDecision,
    drift_bound_check,
    lyapunov_value,
    schedule_frame,
)
from .beamform import (
    SlotSolution,
    min_power_beamforming,
    optimize_slot,
    phi_upper_bound,
    rate,
    sinr,
    sinr_target,
    slot_objective,
)
from .energy import (
    EnergyLedger,
    NreTrace,
    frame_expenditure,
    grid_exchange,
    harvest_power,
    interpolate_trace,
    load_nre_trace,
)
from .simulator import RunMetrics, RunResult, annualize, measure_delay, run, sweep_v

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
