"""rtroom: interactive external-beam radiotherapy room simulator.

Kinematic linac model (gantry, collimator, couch, attachments) plus a patient
surface reconstructed from CT slices, answering collision, clearance,
beam-intersection, and distance queries -- live over HTTP for the browser UI
and batch-style from the CLI.
"""

from .bvh import Bvh
from .collision import (ColliderPair, CollisionReport, beam_couch_intersection,
                        compute_collision, couch_gantry_fast_check,
                        default_pairs, mesh_distance, mesh_intersects,
                        scene_collision)
from .ct import (IsoMesh, SliceStackMeta, VolumeGrid, largest_component,
                 load_slice_stack, marching_cubes, write_slice_stack)
from .decimate import decimate, decimate_mesh
from .machine import (Attachment, MachineDescription, MachineState,
                      PlacedComponent, Scene, beam_frustum, builtin_machines,
                      builtin_phantom, clamp_state, forward_kinematics,
                      load_machine_file)
from .measure import AccuracyStats, MeasurementProbe, ProbeEnd, accuracy_stats, measure
from .mesh import Aabb, Obb, TriMesh, box, cylinder, ellipsoid, fit_obb, ring_sector
from .meshio import read_mesh, read_obj, read_stl, write_mesh, write_obj, write_stl
from .scenario import (MachineCatalog, Scenario, ScenarioResult, load_scenario,
                       run_scenario, run_suite, save_scenario)
from .transforms import (GeometryError, apply_point, apply_points, compose,
                         identity, invert, rot_x, rot_y, rot_z, translate)

__version__ = "0.1.0"
