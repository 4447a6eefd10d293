"""GNSS spoofing test bench: trajectories, sensors, EKF, attacks, detectors."""

__version__ = "0.1.0"
