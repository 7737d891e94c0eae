from .measure import (LineMeasure, TorusMeasure, builtin_nu_truncated_sine, delta, density_table,
                      from_fourier_table, periodic_reduce, regular_set)
from .material import (Constant, Cosine, Gaussian, KernelTerm, LinearKernelField, MaterialSpec,
                       Profile, SumProfile, Table, profile_from_dict, subharmonic_restrict)
from .assumptions import AssumptionReport, Verdict, validate_assumptions

__all__ = [
    "LineMeasure", "TorusMeasure", "builtin_nu_truncated_sine", "delta", "density_table",
    "from_fourier_table", "periodic_reduce", "regular_set", "Constant", "Cosine", "Gaussian",
    "KernelTerm", "LinearKernelField", "MaterialSpec", "Profile", "SumProfile", "Table",
    "profile_from_dict", "subharmonic_restrict", "AssumptionReport", "Verdict",
    "validate_assumptions",
]
