import os

from dotenv import load_dotenv

# Paths
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

env_path = os.path.join(BASE_DIR, ".env")
load_dotenv(dotenv_path=env_path)

RESULTS_DIR = os.getenv("RESULTS_DIR", os.path.join(BASE_DIR, "results"))

# Logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "WARNING").upper()
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
