"""Sound field reproduction with pressure and mode matching, weighted and plain."""
from . import capture, field, harness, reproduce, sphfunc
from .capture import (DirectivityCoeffs, HarmonicAnalysis, KernelInterpolator, MicArray,
                      directivity_coeffs_cardioid, directivity_coeffs_omni, idha_estimate,
                      kernel_gram, kernel_interpolate, kernel_vector, psi_matrix, xi_matrix)
from .field import (PlaneWaveField, PointSourceField, TransferSet, WaveContext,
                    plane_wave_coeffs, plane_wave_pressure, point_source_coeffs,
                    point_source_pressure, synthesize_pressure, transfer_coeffs,
                    transfer_matrix)
from .harness import (Scenario, SdrResult, build_standard_scenario, run_scenario, sdr,
                      sweep_control_points, sweep_order)
from .reproduce import (ModeMatching, PressureMatching, Rectangle, Sphere, WeightedModeMatching,
                        WeightedPressureMatching, WeightMatrix, prune_wmm_weights,
                        region_quadrature, reg_param, solve_mm, solve_pm, solve_wmm, solve_wpm,
                        weight_mm, weight_pm)
from .sphfunc import (gaunt, sph_bessel_j, sph_hankel1, sph_harm, translation_matrix,
                      wavefunction_vector)

__version__ = "0.1.0"
