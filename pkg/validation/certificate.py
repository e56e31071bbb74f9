import hashlib
import json
import logging
from dataclasses import dataclass, field

from utils.serial_utils import convert_to_serializable


@dataclass(frozen=True)
class Metric:
    """
    One asserted bound: value <= bound (relation '<=') or value >= bound (relation '>=')
    """
    name: str
    value: float
    bound: float
    relation: str = '<='

    @property
    def satisfied(self):
        if self.value != self.value:
            return False
        return self.value <= self.bound if self.relation == '<=' else self.value >= self.bound

    def to_dict(self):
        return {'name': self.name, 'value': self.value, 'bound': self.bound, 'relation': self.relation,
                'satisfied': self.satisfied}


def check_le(name, value, bound):
    metric = Metric(name, float(value), float(bound), '<=')
    logging.info(f"{name}: {metric.value:.3e} <= {metric.bound:.3e} -> {metric.satisfied}")
    return metric


def check_ge(name, value, bound):
    metric = Metric(name, float(value), float(bound), '>=')
    logging.info(f"{name}: {metric.value:.3e} >= {metric.bound:.3e} -> {metric.satisfied}")
    return metric


def config_hash(record):
    """
    sha256 of the canonical JSON rendering of a resolved config
    """
    canonical = json.dumps(record, sort_keys=True, separators=(',', ':'), default=convert_to_serializable)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


@dataclass
class Certificate:
    experiment: str
    metrics: list
    provenance: dict
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(m.satisfied for m in self.metrics)

    def to_dict(self):
        return {
            'experiment': self.experiment,
            'pass': self.passed,
            'metrics': [m.to_dict() for m in self.metrics],
            'provenance': self.provenance,
            'details': self.details,
        }
