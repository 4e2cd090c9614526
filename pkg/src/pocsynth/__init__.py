"""Object insertion for segmentation datasets and anomaly-segmentation metrics."""

__version__ = "0.1.0"
