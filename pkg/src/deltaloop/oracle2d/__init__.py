"""Independent eigenvalue oracles for the full two-dimensional operator."""
from .currents import CurrentReport, persistent_current
from .fem import gauge_shift_check, general_solve, smooth_gauge
from .mesh import MeshControl, MeshProblem, build_loop_mesh, read_mesh, write_mesh
from .radial import RadialProblem, closed_form_level, landau_levels, radial_solve

__all__ = [
    "CurrentReport", "MeshControl", "MeshProblem", "RadialProblem", "build_loop_mesh",
    "closed_form_level", "gauge_shift_check", "general_solve", "landau_levels",
    "persistent_current", "radial_solve", "read_mesh", "smooth_gauge", "write_mesh",
]
