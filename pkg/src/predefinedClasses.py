"""Predefined classes

The 21 vehicle classes of the DhakaAI traffic dataset together with their training label counts.
The counts double as the simulator's default class sampling weights.
"""

# Stdlib imports
import os
import sys
from typing import Dict, List, Tuple

# Extend module paths
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))


DHAKA_AI_NAME = "dhaka-ai"

# (class name, label count), alphabetical as published
DHAKA_AI_CLASS_COUNTS: Tuple[Tuple[str, int], ...] = (
    ("Ambulance", 76),
    ("Army Vehicle", 25),
    ("Auto Rickshaw", 465),
    ("Bicycle", 465),
    ("Bus", 3340),
    ("Car", 5574),
    ("Garbage Van", 8),
    ("Human Hauler", 170),
    ("Minibus", 100),
    ("Minivan", 815),
    ("Motorbike", 2252),
    ("Pickup", 1178),
    ("Police Car", 33),
    ("Rickshaw", 3495),
    ("Scooter", 30),
    ("SUV", 667),
    ("Taxi", 59),
    ("Three Wheeler (CNG)", 2982),
    ("Truck", 1475),
    ("Van", 682),
    ("Wheelbarrow", 251),
)


def dhaka_ai_class_names() -> List[str]:
    """Class names in class-id order."""

    return [name for name, _ in DHAKA_AI_CLASS_COUNTS]


def dhaka_ai_label_counts() -> Dict[str, int]:
    """Published label count per class name."""

    return dict(DHAKA_AI_CLASS_COUNTS)


def dhaka_ai_class_weights() -> List[float]:
    """Sampling weights proportional to the published label counts, in class-id order."""

    total = sum(count for _, count in DHAKA_AI_CLASS_COUNTS)
    return [count / total for _, count in DHAKA_AI_CLASS_COUNTS]
