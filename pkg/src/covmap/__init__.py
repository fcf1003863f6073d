"""covmap: base-station maps to cellular coverage-probability manifolds."""

from .baselines import PppParams, bfsg_manifold, ppp_acp, ppp_manifold, rho, rho_alpha4
from .config import PipelineConfig, derive_seed
from .coverage import (ChannelParams, CoverageManifold, coverage_at, manifold,
                       manifold_set, mc_coverage_at, mc_manifold, roe_grid)
from .errors import FormatError, InputDomainError
from .geo import EARTH_RADIUS_M, GeoPoint, PlanarPoint, RoiFrame, assign, haversine_m, partition, project
from .metrics import EvalReport, avg, dataset_error, l1, render_table
from .store import DatasetManifest, TileEntry, read_tile, render_png, render_triptych, write_tile
from .tiles import (GridSpec, RoiTile, SplitAssignment, filter_tiles, rasterize,
                    split, synth_clustered, synth_ppp)

__version__ = "0.1.0"
