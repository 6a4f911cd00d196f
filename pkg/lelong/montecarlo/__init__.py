"""
蒙特卡洛模块

- cloud: 环带样本云与 φ、ψ 求值
- profile: 环带质量、发散指数与尾部诊断
- threshold: 二分法阈值估计与 t 扫描
- properties: 性质的数值检查
"""

from lelong.montecarlo.cloud import (
    CloudValues,
    SampleCloud,
    build_cloud,
    cloud_for_budget,
    evaluate_cloud,
)
from lelong.montecarlo.profile import (
    AnnulusProfile,
    ConvergenceVerdict,
    TailDiagnostics,
    divergence_exponent,
    integral_profile,
    integrability_verdict,
    profile_from_log_integrand,
    tail_diagnostics,
    tail_index,
)
from lelong.montecarlo.threshold import (
    ScanRow,
    ThresholdEstimate,
    ThresholdOracle,
    bisect_threshold,
    bracket_flags,
    estimate_threshold,
    scan_t,
)
from lelong.montecarlo.properties import (
    LevelsetPoint,
    PropertyReport,
    biholo_invariance_check,
    hoelder_property_suite,
    levelset_scan,
    scaling_check,
    singularity_shift_check,
)

__all__ = [
    "SampleCloud",
    "CloudValues",
    "build_cloud",
    "cloud_for_budget",
    "evaluate_cloud",
    "AnnulusProfile",
    "ConvergenceVerdict",
    "TailDiagnostics",
    "divergence_exponent",
    "integral_profile",
    "integrability_verdict",
    "profile_from_log_integrand",
    "tail_diagnostics",
    "tail_index",
    "ThresholdEstimate",
    "ThresholdOracle",
    "ScanRow",
    "bisect_threshold",
    "bracket_flags",
    "estimate_threshold",
    "scan_t",
    "PropertyReport",
    "LevelsetPoint",
    "scaling_check",
    "hoelder_property_suite",
    "biholo_invariance_check",
    "levelset_scan",
    "singularity_shift_check",
]
