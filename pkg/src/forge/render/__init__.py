from .raster import RenderSpec, VIEW_ORDER, render, render_turntable, render_views

__all__ = ["RenderSpec", "VIEW_ORDER", "render", "render_turntable", "render_views"]
