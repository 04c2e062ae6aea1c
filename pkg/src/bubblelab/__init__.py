"""Bubble detection on daily price series: epsilon drawup/drawdown peaks,
LPPLS calibration, multiscale confidence indicators and clustered
crash-time scenarios."""

__version__ = "0.1.0"
