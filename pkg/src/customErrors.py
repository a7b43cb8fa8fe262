"""Custom error classes.

Definitions of error classes used in the project.
Everything caused by user input derives from InputError, which the CLI maps to exit code 2.
"""

# Stdlib imports
import os
import sys
from typing import Iterable, Optional

# Extend module paths
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))


class ToolkitError(Exception):
    """Base class for all toolkit errors."""
    pass


class UndefinedMetricError(ToolkitError):
    """Error for a metric that has no defined value, e.g. mAP over zero classes."""
    pass


""" Input errors """


class InputError(ToolkitError):
    """Base class for errors caused by user input."""
    pass


class InvalidArgumentError(InputError, ValueError):
    """Error for an argument outside its valid range."""
    pass


class InvalidBoxError(InvalidArgumentError):
    """Error for a box that violates its invariants."""
    pass


class LabelParseError(InputError):
    """Error for a malformed label or prediction line."""

    def __init__(self, message: str, line_no: Optional[int] = None, line: Optional[str] = None):
        self.line_no = line_no
        self.line = line
        self.reason = message
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(f"{where}{message}")


class LabelFileError(InputError):
    """Error for a label file that cannot be read or contains a bad line."""

    def __init__(self, path, message: str, line_no: Optional[int] = None):
        self.path = str(path)
        self.line_no = line_no
        where = f"{self.path}:{line_no}" if line_no is not None else self.path
        super().__init__(f"{where}: {message}")


class ManifestError(InputError):
    """Error for a malformed dataset manifest."""

    def __init__(self, message: str, key_path: str = ""):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}" if key_path else message)


class ConfigError(InputError):
    """Error for a malformed experiment configuration."""

    def __init__(self, message: str, key_path: str = ""):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}" if key_path else message)


class UnknownImageError(InputError):
    """Error for predictions that reference images missing from the manifest."""

    def __init__(self, image_ids: Iterable[str]):
        self.image_ids = sorted(image_ids)
        super().__init__(f"Unknown image id(s): {', '.join(self.image_ids)}")


class UnknownClassError(InputError):
    """Error for a class id outside the class table."""
    pass


class FoldSplitError(InputError):
    """Error for a fold split that cannot be made."""
    pass


class MissingPredictionFilesError(InputError):
    """Error for prediction directories whose file sets do not line up."""

    def __init__(self, missing: dict):
        self.missing = missing
        lines = [f"{directory}: {', '.join(sorted(names))}" for directory, names in sorted(missing.items())]
        super().__init__("Missing prediction files\n" + "\n".join(lines))


class SceneGenerationError(InputError):
    """Error for a scene whose overlap constraint cannot be satisfied."""
    pass
