"""Light shift of 5P3/2 in a 1529 nm standing wave.

Prints, for each target shift of the F'=2, mF=-1 level, the peak intensity
needed and how far the other F'=2 sublevels are spread by mF mixing.
"""

import warnings

from dressedscope import levels

g = levels.RB87.gamma
print(f"{'U/Gamma':>8} {'I (W/cm2)':>11} {'F2 spread/Gamma':>16} {'3-level ok':>10}")
for u in (2.5, 7.2, 11.6, 15.8, 21.0, 40.0):
    inten = levels.intensity_for_shift(u * g)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        spec = levels.hyperfine_stark_spectrum(inten)
    print(f"{u:8.1f} {inten * 1e-4:11.2f} {spec.f2_spread / g:16.3f} {str(spec.three_level_valid):>10}")
