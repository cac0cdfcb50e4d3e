from dataclasses import dataclass, field, asdict
from typing import Dict, Optional, Any, Tuple
import os
from pathlib import Path
import yaml
from dotenv import load_dotenv

DEFAULT_CONFIG_PATH = Path(__file__).with_name("default_config.yaml")

@dataclass
class PathConfig:
    """Configuration for file paths"""
    base_dir: str = "."
    log_dir: str = "logs"
    results_dir: str = "results"

    def __post_init__(self):
        """Create directories if they don't exist"""
        for dir_path in [self.log_dir, self.results_dir]:
            Path(dir_path).mkdir(parents=True, exist_ok=True)

@dataclass
class GreenConfig:
    """Defaults for Green's function providers"""
    boundary_margin_factor: float = 1e-3
    mfs_offset: float = 4.0
    # "enclosing_ball" fits H - H_ball of the smallest centered enclosing ball, "none" fits H itself
    mfs_reference: str = "enclosing_ball"
    mfs_sources: int = 800
    collocation_points: int = 2000
    holdout_points: int = 400
    fit_tolerance: float = 1e-6
    svd_rcond: float = 1e-13
    chunk_size: int = 512

@dataclass
class SearchDefaults:
    """Defaults for the multistart critical point search"""
    starts: int = 200
    max_newton_iters: int = 100
    grad_tol: float = 1e-9
    dedup_factor: float = 1e-4
    scale_dedup_rtol: float = 1e-4
    nondegeneracy_tol: float = 1e-8
    seed: int = 0
    interior_margin: float = 0.05
    scale_bounds: Tuple[float, float] = (1e-3, 1e3)

@dataclass
class QuadratureDefaults:
    """Defaults for hypersphere quadrature"""
    samples: int = 100000
    theta_factor: float = 0.1
    scheme: str = "monte_carlo"
    rule: str = "uniform"
    product_resolution: int = 8
    seed: int = 0

@dataclass
class RuntimeConfig:
    """Parallelism settings"""
    n_jobs: int = 1

@dataclass
class LoggingConfig:
    """Logging configuration"""
    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    file: str = "logs/bn_reduction.log"
    max_size: int = 10 * 1024 * 1024  # 10MB
    backup_count: int = 5

_SECTIONS = {
    "green": GreenConfig,
    "search": SearchDefaults,
    "quadrature": QuadratureDefaults,
    "runtime": RuntimeConfig,
}

@dataclass
class Config:
    """Main configuration class"""
    paths: PathConfig
    logging: LoggingConfig
    green: GreenConfig = field(default_factory=GreenConfig)
    search: SearchDefaults = field(default_factory=SearchDefaults)
    quadrature: QuadratureDefaults = field(default_factory=QuadratureDefaults)
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)
    debug: bool = False

    @staticmethod
    def _sections_from_dict(config_dict: Dict[str, Any]) -> Dict[str, Any]:
        sections = {}
        for name, section_cls in _SECTIONS.items():
            values = dict(config_dict.get(name) or {})
            if "scale_bounds" in values:
                values["scale_bounds"] = tuple(values["scale_bounds"])
            sections[name] = section_cls(**values)
        return sections

    @classmethod
    def from_yaml(cls, yaml_path: str) -> 'Config':
        """Load configuration from YAML file"""
        with open(yaml_path, 'r') as f:
            config_dict = yaml.safe_load(f) or {}
        return cls(
            paths=PathConfig(**(config_dict.get('paths') or {})),
            logging=LoggingConfig(**(config_dict.get('logging') or {})),
            debug=bool(config_dict.get('debug', False)),
            **cls._sections_from_dict(config_dict)
        )

    @classmethod
    def from_env(cls) -> 'Config':
        """Load shipped defaults, then apply environment overrides"""
        load_dotenv()

        base = cls.from_yaml(str(DEFAULT_CONFIG_PATH)) if DEFAULT_CONFIG_PATH.exists() else None

        paths = base.paths if base else PathConfig()

        logging = base.logging if base else LoggingConfig()
        logging.level = os.getenv('LOG_LEVEL', logging.level)
        logging.file = os.path.join(paths.log_dir, os.path.basename(logging.file))

        runtime = base.runtime if base else RuntimeConfig()
        threads = os.getenv('BN_REDUCTION_THREADS')
        if threads:
            runtime.n_jobs = int(threads)

        return cls(
            paths=paths,
            logging=logging,
            green=base.green if base else GreenConfig(),
            search=base.search if base else SearchDefaults(),
            quadrature=base.quadrature if base else QuadratureDefaults(),
            runtime=runtime,
            debug=os.getenv('DEBUG', 'False').lower() == 'true'
        )

    def merged_with(self, yaml_path: Optional[str]) -> 'Config':
        """Overlay a user YAML file on this configuration"""
        if not yaml_path:
            return self
        with open(yaml_path, 'r') as f:
            overrides = yaml.safe_load(f) or {}
        current = self.to_dict()
        for name, values in overrides.items():
            if isinstance(values, dict) and isinstance(current.get(name), dict):
                current[name].update(values)
            else:
                current[name] = values
        return Config(
            paths=PathConfig(**current['paths']),
            logging=LoggingConfig(**current['logging']),
            debug=bool(current.get('debug', False)),
            **self._sections_from_dict(current)
        )

    def update(self, other: 'Config'):
        """Replace every section in place so modules holding this object see the change"""
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(other, name))

    def to_dict(self) -> Dict[str, Any]:
        config_dict = asdict(self)
        config_dict['search']['scale_bounds'] = list(self.search.scale_bounds)
        return config_dict

    def save(self, yaml_path: str):
        """Save configuration to YAML file"""
        with open(yaml_path, 'w') as f:
            yaml.dump(self.to_dict(), f, default_flow_style=False)

# Create default configuration
config = Config.from_env()
