import json
import logging
import os

from utils.errors import OutputError
from utils.serial_utils import convert_to_serializable

DATA_FILE = 'data.csv'
CERTIFICATE_FILE = 'certificate.json'


def write_data(frame, out_dir):
    """
    Write the experiment table as CSV with shortest round-trip float formatting
    :param frame: pandas DataFrame
    :param out_dir: str, output directory
    :return: str, written path
    """
    path = os.path.join(out_dir, DATA_FILE)
    try:
        os.makedirs(out_dir, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator='\n')
    except OSError as e:
        logging.error(f"Error while writing data to {path}: {e}")
        raise OutputError(f"Could not write {path}: {e}")
    logging.info(f"Data written to {path}")
    return path


def write_certificate(certificate, out_dir):
    """
    Write the pass/fail certificate as JSON with sorted keys
    :param certificate: Certificate
    :param out_dir: str, output directory
    :return: str, written path
    """
    path = os.path.join(out_dir, CERTIFICATE_FILE)
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(path, 'w') as file:
            file.write(json.dumps(certificate.to_dict(), default=convert_to_serializable, sort_keys=True, indent=2))
            file.write('\n')
    except OSError as e:
        logging.error(f"Error while writing certificate to {path}: {e}")
        raise OutputError(f"Could not write {path}: {e}")
    logging.info(f"Certificate written to {path}")
    return path
