"""Railpad condition monitoring from under-sleeper vibration.

The pipeline estimates the pad resonance from per-bogie vibration
segments, removes the seasonal temperature dependence, models the
residuals with a generalized extreme value law, and raises alarms with a
calibrated likelihood-ratio test.
"""

from .errors import (
    ConfigError,
    DataError,
    DecompositionError,
    DetectorError,
    EstimationError,
    FitError,
    IdentificationError,
    PadmonError,
)
from .ingest import (
    BogieSegment,
    PassageRecord,
    ScreeningRule,
    TemperatureSeries,
    lowpass,
    normalize,
    screen_passages,
    slice_bogies,
    sync_wheel_detector,
)
from .emd import ImfSet, decompose, select_imf2
from .modal import (
    EstimationSettings,
    FrequencyEstimate,
    StateSpaceModel,
    eigen_frequency,
    estimate_passage,
    identify_order2,
)
from .tempmodel import (
    ResidualSequence,
    TempFreqModel,
    TempFreqPoint,
    bin_by_temperature,
    evaluate,
    fit_piecewise,
    residuals,
    shift_to_location,
)
from .evd import (
    FitReport,
    GevFit,
    GevParams,
    fit_gaussian,
    fit_gev,
    fit_weibull3,
    gev_cdf,
    gev_loglik,
    gev_pdf,
    gev_quantile,
    gev_sample,
    ks_test,
)
from .detect import (
    DetectionReport,
    DetectorState,
    apply_calibration,
    calibrate,
    glrt_statistic,
    initialize,
    step,
)
from .sim import (
    DegradationSchedule,
    TrackConfig,
    TrainConfig,
    default_f2_map,
    noise_std_for_snr,
    synth_campaign,
    synth_passage,
    synth_temperature,
)

__version__ = "0.1.0"
