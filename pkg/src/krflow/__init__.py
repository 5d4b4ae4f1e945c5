"""Rotationally symmetric Kahler-Ricci flow toolkit.

Submodules:
  geometry  - metric profiles, coordinate changes, curvature
  soliton   - shrinking-soliton construction and constants
  flow      - moving-boundary and dilated evolution engines
  analysis  - dilation, convergence errors, blow-up rate fits
  barriers  - class membership, sub/supersolutions, comparison harness
  acceptance- the pinned verification criteria (A1..A14)
"""

from . import analysis, barriers, flow, geometry, grids, soliton, states

__version__ = "0.1.0"
