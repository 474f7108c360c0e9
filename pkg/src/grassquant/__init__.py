"""Quantization on Grassmann manifolds: ball volumes, distortion bounds, codebooks, MIMO feedback."""
from .core import (Field, Plane, PrincipalAngles, SeededRng, chordal_distance, chordal_distance_sq,
                   complement, plane_from_dict, plane_to_dict, principal_angles, sample_uniform)
from .volume import (ManifoldParams, VolumeResult, barg_volume, volume_bounds, volume_coefficient,
                     volume_correction, volume_main_order, volume_monte_carlo,
                     volume_quadrature_oracle)
from .bounds import (BoundReport, DetailParams, Validity, circle_quantizer_oracle,
                     distortion_bound_from_min_distance, drf_asymptotic, drf_detailed,
                     drf_exact_circle, drf_lower, drf_upper, gv_code_size, hamming_code_size,
                     heath_approx, rdf_asymptotic, rdf_lower, rdf_upper)
from .codebook import (Codebook, DistortionEstimate, estimate_distortion, maxmin_design,
                       min_distance, quantize, random_codebook)
from .mimo import (DegenerateManifoldError, MimoConfig, RateReport, feedback_select,
                   optimal_beamformer, perfect_csit_rate, predict_rate, rate_report,
                   sample_channel, simulate_rate)

__version__ = "0.1.0"
