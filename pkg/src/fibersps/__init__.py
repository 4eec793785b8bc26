"""fibersps: simulator and analysis toolkit for a rare-earth-ion fiber
single-photon source -- emitter dynamics, detection chain, gated/coincidence
measurement, model fitting, and efficiency analysis."""

from .physics import (
    EmitterParams,
    PumpParams,
    OpticsParams,
    Measured,
    lifetime_intensity,
    g2_model,
    pump_intensity,
    absorption_time,
    absorption_time_composed,
    objective_collection_efficiency,
    channeling_efficiency,
    ratio_with_uncertainty,
    collection_efficiency_ratio,
)
from .events import PhotonEventStream, read_stream_csv, write_stream_csv
from .emitter import (
    PulseSchedule,
    SolidAngleSpec,
    simulate_cw,
    simulate_pulsed,
    solid_angle_mc,
    add_poisson_background,
)
from .detection import (
    DetectorParams,
    GateSchedule,
    CoincidenceHistogram,
    apply_detector,
    spectral_detection_ratio,
    apply_gate,
    tac_first_stop,
    hbt_split,
    correlate,
    histogram_delays,
    read_histogram_csv,
    write_histogram_csv,
)
from .fitting import (
    FitResult,
    fit_lifetime,
    fit_g2,
    single_photon_verdict,
    count_rate,
)

__version__ = "0.1.0"
