"""Pointwise spectral geometry on flat tori, flat Klein bottles and hyperbolic surfaces."""

from .echo import (Curvature, DetectionResult, SpectralData, classify_curvature, constancy_test,
                   detect_multiplicity, klein_echolocate, synthesize_spectral_from_geometric)
from .geometry import (FlatKleinSpec, FlatTorusSpec, HPoint, HyperbolicSurfaceSpec, MobiusElement, Point,
                       bolza_surface, hyperbolic_distance, klein_canonicalize, mobius_apply)
from .loops import (FlatDeckSpec, LoopTable, enumerate_deck, geometric_side, geometric_side_flat, looping_times,
                    shortest_loop, translation_length)
from .spectrum import klein_modes, level_sum, mode_density, pointwise_weyl, torus_modes
from .traces import (Profile, TraceValue, Weight, Window, curvature_estimate, heat_trace, smoothed_wave_spectral,
                     window_transform)

__version__ = "0.1.0"
