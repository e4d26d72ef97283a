"""roomedit: language-guided 3D room layout editing toolkit."""

__version__ = "0.1.0"
