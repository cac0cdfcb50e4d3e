import json
import os
from typing import Any, Dict

from pydantic import ValidationError

from config.config import config
from schemas.domain_schema import DomainSpec
from utils.logger import get_logger

logger = get_logger(__name__)


class DomainLoader:
    """Class for loading and validating domain descriptions"""

    def __init__(self):
        self.config = config
        self.logger = logger

    def load_domain(self, file_path: str) -> DomainSpec:
        """Load a DomainSpec from a JSON file"""
        try:
            # Check if file exists
            if not os.path.exists(file_path):
                raise FileNotFoundError(f"Domain file not found: {file_path}")

            with open(file_path, 'r') as f:
                text = f.read()
            spec = self.parse(text, source=file_path)
            self.logger.info(f"Loaded {spec.shape.type} domain in R^{spec.dimension} from {file_path}")
            return spec

        except Exception as e:
            self.logger.error(f"Error loading domain: {str(e)}")
            raise

    def parse(self, text: str, source: str = "<string>") -> DomainSpec:
        """
        Parse and validate a JSON domain description.

        Raises:
            ValueError: with line and column for malformed JSON, or with the
            offending field paths for schema violations
        """
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValueError(f"Malformed JSON in {source} at line {e.lineno}, column {e.colno}: {e.msg}") from e
        return self.validate(data, source)

    def validate(self, data: Dict[str, Any], source: str = "<dict>") -> DomainSpec:
        try:
            return DomainSpec.model_validate(data)
        except ValidationError as e:
            problems = []
            for error in e.errors():
                location = ".".join(str(part) for part in error["loc"]) or "<root>"
                problems.append(f"{location}: {error['msg']}")
            raise ValueError(f"Invalid domain in {source}: " + "; ".join(problems)) from e
