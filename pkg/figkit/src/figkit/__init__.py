"""figkit: regenerates publication-style panels from cavmol CSV output.

Every plotted number is read from CSV; no physics is recomputed here.
"""

from .panels import PANEL_KINDS, PanelSpec, SchemaError, render

__version__ = "0.1.0"

__all__ = ["PANEL_KINDS", "PanelSpec", "SchemaError", "render", "__version__"]
