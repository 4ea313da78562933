"""conflat: numerical conformally-flat geometry and lightcone hypersurface pairs.

The package is organized bottom-up:

* :mod:`conflat.expr` / :mod:`conflat.jets` — closed-form coordinate
  expressions evaluated together with all partial derivatives via
  truncated-jet arithmetic,
* :mod:`conflat.curvature` — intrinsic tensors of a chart metric up to the
  conformal curvature tensor, plus conformal-flatness certification,
* :mod:`conflat.duality` — the dual metric, its operator form, parabolic
  detection and numerical verification of the duality identities,
* :mod:`conflat.lorentz` — Lorentz–Minkowski linear algebra and the
  lightcone / hyperbolic / de Sitter model dictionary,
* :mod:`conflat.frontal` — spacelike pairs of lightcone maps, fundamental
  forms, the Gauss equation, and the example gallery,
* :mod:`conflat.surface2d` — the two-dimensional theory: holomorphic seeds,
  trace conditions, moving-frame realization in the 3-lightcone,
* :mod:`conflat.cli` — configuration-driven experiment runner.
"""

__version__ = "0.1.0"
