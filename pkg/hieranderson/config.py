import os
import yaml
from dotenv import load_dotenv
from pathlib import Path
ROOT_DIR = Path(__file__).resolve().parent.parent

def load_config(file_path=None):
    if not file_path:
        file_path = os.getenv("HIERANDERSON_CONFIG") or ROOT_DIR / 'config' / 'config.yml'

    with open(file_path, 'r') as file:
        config = yaml.safe_load(file)
    return config

def output_directory(path):
    path = Path(path)
    if not path.is_absolute():
        path = ROOT_DIR / path
    path.mkdir(parents=True, exist_ok=True)
    return path

def _env_int(name, default):
    value = os.getenv(name)
    if value is None or value == '':
        return default
    return int(value)

load_dotenv(ROOT_DIR / '.env')
CONFIG = load_config()

LOG_DIR = ROOT_DIR / CONFIG['LOGGING']['LOG_DIR']
LOG_FILE = CONFIG['LOGGING']['LOG_FILE']
LOG_LEVEL = os.getenv("HIERANDERSON_LOG_LEVEL", CONFIG['LOGGING']['LEVEL'])
OUT_DIR = os.getenv("HIERANDERSON_OUT_DIR", CONFIG['SAVE_DIR']['OUT_DIR'])

DENSE_CAP = _env_int("HIERANDERSON_DENSE_CAP", CONFIG['RESOURCES']['DENSE_CAP'])
# None means "all cores" for joblib (n_jobs=-1)
THREADS = _env_int("HIERANDERSON_THREADS", CONFIG['RESOURCES']['THREADS'])

TOLERANCES = CONFIG['TOLERANCES']
COUNTING_SLACK = float(TOLERANCES['COUNTING_SLACK'])
RANK_SLACK = float(TOLERANCES['RANK_SLACK'])

SIGMA_ORDERING = float(CONFIG['SIGMA']['ORDERING'])
SIGMA_MEAN = float(CONFIG['SIGMA']['MEAN'])

ITERATIVE = CONFIG['ITERATIVE']
EXPERIMENT_DEFAULTS = CONFIG['EXPERIMENT']
