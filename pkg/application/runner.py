import logging

import numpy as np

from application.experiments import ExperimentContext, experiments
from application.output.writers import write_certificate, write_data
from processing.time_change import TimeChange
from utils.errors import ConfigError
from validation.certificate import Certificate, config_hash

VERSION = '0.1.0'


class ExperimentRunner:

    def __init__(self, config):
        if config.experiment not in experiments:
            raise ConfigError(f"Unknown experiment '{config.experiment}', available: {sorted(experiments)}")
        self.config = config
        self.experiment = experiments[config.experiment]
        self.tc = TimeChange(config.tau)
        self.rng = np.random.default_rng(config.seed)
        logging.info(f"Prepared experiment '{config.experiment}' with seed {config.seed}")

    def provenance(self):
        return {'config_hash': config_hash(self.config.to_dict()), 'seed': self.config.seed, 'version': VERSION}

    def run(self):
        """
        Execute the experiment and return its certificate without touching the filesystem
        :return: tuple (Certificate, pandas DataFrame)
        """
        context = ExperimentContext(self.config, self.tc, self.rng)
        result = self.experiment.run(context)
        certificate = Certificate(self.config.experiment, result.metrics, self.provenance(), result.details)
        failed = [m.name for m in certificate.metrics if not m.satisfied]
        if failed:
            logging.warning(f"Experiment '{self.config.experiment}' failed checks: {failed}")
        else:
            logging.info(f"Experiment '{self.config.experiment}' passed {len(certificate.metrics)} checks")
        return certificate, result.data

    def run_and_save(self):
        """
        Execute the experiment and write data.csv and certificate.json under the configured output directory
        :return: Certificate
        """
        certificate, data = self.run()
        write_data(data, self.config.out)
        write_certificate(certificate, self.config.out)
        return certificate
