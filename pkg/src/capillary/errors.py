"""Exception and warning types shared across the package."""


class CapillaryError(Exception):
    """Base class for all package errors."""


class AmbiguousProjection(CapillaryError):
    """Point is equidistant from several wall points (e.g. the ball center)."""


class NonClosedBoundary(CapillaryError):
    """Mesh boundary edges do not form closed loops."""


class SelfIntersectingWall(CapillaryError):
    """Wall region bounded by the contact lines is ill-defined."""


class DegenerateStar(CapillaryError):
    """Vertex star too degenerate for a quadric fit."""


class NonTangentVariation(CapillaryError):
    """Variation field violates wall tangency at a boundary vertex."""


class MeshDegenerated(CapillaryError):
    """Triangle quality collapsed during relaxation and repair failed."""


class GridMismatch(CapillaryError):
    """Voxel regions live on different grids."""


class InfeasibleConstraint(CapillaryError):
    """Replacement step budget delta smaller than one cell move."""


class TooLarge(CapillaryError):
    """Brute-force enumeration domain exceeds the supported size."""


class TrivialSweepout(CapillaryError):
    """Sweepout width does not exceed the endpoint energies."""


class WidthCollapse(CapillaryError):
    """Mountain-pass width fell to the trivial level (homotopy class lost)."""


class NoConvergence(CapillaryError):
    """Iterative eigensolver failed after the configured restarts."""


class BadMu(CapillaryError):
    """Foliation parameter mu outside its admissible interval."""


class OutOfScale(CapillaryError):
    """Annulus radius beyond the barrier scale s*."""


class NoWitness(CapillaryError):
    """Witness scan found no positive SSY constant (implementation bug for n<=5)."""


class NotMinimal(CapillaryError):
    """Mesh is not close enough to a minimal surface for identity checks."""


class ConfigError(CapillaryError):
    """Invalid run configuration."""


class NotCriticalWarning(UserWarning):
    """Jacobi form assembled on a mesh that is not numerically critical."""
