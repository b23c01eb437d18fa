"""Fixed drawing conventions shared by every renderer.

Golden-image tests depend on these values; change them only together with
the fixtures that pin rendered colors.
"""

BACKGROUND = (255, 255, 255, 255)
WALL_STROKE = (60, 60, 60, 255)
DOOR_GLYPH = (150, 90, 40, 255)
WINDOW_GLYPH = (110, 180, 230, 255)
WINDOW_FRAME = (30, 80, 140, 255)
LABEL_INK = (0, 0, 0, 255)
LABEL_BG = (255, 255, 255, 255)
OUTLINE = (20, 20, 20, 255)
FLOOR_STRIP = (200, 200, 200, 255)
ROOM_OUTLINE = (90, 90, 90, 255)

MIN_STROKE_PX = 2
DIM_OPACITY = 0.3

# frame margins, as fractions of the framed extent
SCENE_MARGIN = 0.05
RELATION_MARGIN = 0.20

# get_topdown_object crop ladder, in multiples of the footprint radius
TOPDOWN_OBJECT_LADDER = (1.5, 4.0)
FRONTVIEW_NEIGHBOR_RADIUS = 2.0
SWATCH_SIZE = 256
WALL_MOUNT_TOLERANCE = 0.5

DEFAULT_RESOLUTION = {"remote": 1200, "local": 335, "mock": 335}


def label_scale(resolution: int) -> int:
    return max(1, resolution // 400)


def stroke_px(resolution: int) -> int:
    return max(MIN_STROKE_PX, resolution // 300)
