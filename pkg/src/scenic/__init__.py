"""SCENIC: location-triggered storytelling and cognitive prompting for car journeys."""

__version__ = "0.1.0"
