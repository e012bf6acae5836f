"""Privacy-preserving browsing-telemetry pipeline.

Collection (wire codec + HTTP collector), storage, per-session timeline
reconstruction, behavioral analytics, and a seeded simulator that provides
ground truth for all of it.
"""

__version__ = "0.1.0"
