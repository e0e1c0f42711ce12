"""Full-dynamic-range sky environment maps.

Exposure bracketing and fusion, invertible tone mapping, environment-map
geometry, illumination metrics, sky segmentation and file I/O.
"""

__version__ = "0.1.0"

from .bracketing import (EPS_HI, EPS_LO, CandlestickRow, ExposureBracket, ExposureSet,
                         candlestick, decay_schedule, decompose, normalize_exposure,
                         validate_coverage)
from .fusion import (fuse, fuse_hsv, fuse_rgb, fuse_robertson, fuse_weighted, mask_classes,
                     robertson_weight, robertson_weights, validity_mask)
from .geometry import (convert_format, direction_to_pixel, downsample_avg, max_pixel_solid_angle,
                       min_viable_resolution, pixel_direction, pixel_directions,
                       solid_angle_map, solid_angle_of_disk)
from .image import FORMATS, RadianceImage, clip_to_ev, grayscale, hsv_to_rgb, rgb_to_hsv
from .metrics import (IlluminationReport, exposure_value, illumination_report,
                      integrated_illumination, peak_luminance)
from .segmentation import (SegmentationLabel, cloud_mask, composite_label, handdrawn,
                           solar_mask)
from .tonemap import ToneMapper, nonlinearity_error

__all__ = [name for name in dir() if not name.startswith("_")]
