"""
Configuration Manager
Handles loading and accessing environment variables and solver settings
"""

import os
from pathlib import Path
from dotenv import load_dotenv


class Config:
    """Application configuration"""

    def __init__(self):
        """Init.

        Loads the project-root .env file (if any) and exposes every tunable
        as an UPPER_CASE attribute.
        """
        env_path = Path(__file__).parent.parent / '.env'
        load_dotenv(env_path)

        # Metric settings
        self.METRIC_REL_TOL = float(os.getenv('METRIC_REL_TOL', '1e-9'))
        self.TRIANGLE_CHECK_MAX_POINTS = int(os.getenv('TRIANGLE_CHECK_MAX_POINTS', '512'))

        # Solver caps
        self.EXACT_TOUR_CAP = int(os.getenv('EXACT_TOUR_CAP', '14'))
        self.COVER_DP_CAP = int(os.getenv('COVER_DP_CAP', '12'))
        self.COVER_BRUTE_CAP = int(os.getenv('COVER_BRUTE_CAP', '8'))
        self.MATCHING_CAP = int(os.getenv('MATCHING_CAP', '64'))
        self.STEINER_TERMINAL_CAP = int(os.getenv('STEINER_TERMINAL_CAP', '10'))
        self.STEINER_FOREST_TERMINAL_CAP = int(os.getenv('STEINER_FOREST_TERMINAL_CAP', '8'))
        self.TOUR_FALLBACK_TO_APPROX = os.getenv('TOUR_FALLBACK_TO_APPROX', 'true').lower() == 'true'

        # Algorithm defaults
        self.DEFAULT_NU = float(os.getenv('DEFAULT_NU', '2.0'))
        self.DEFAULT_ALPHA = float(os.getenv('DEFAULT_ALPHA', '0.5'))
        self.SIMULATION_MAX_EVENTS = int(os.getenv('SIMULATION_MAX_EVENTS', '200000'))

        # Experiment settings
        self.MATRIX_MAX_WORKERS = int(os.getenv('MATRIX_MAX_WORKERS', '4'))
        self.MATRIX_LAMBDA_CAP = int(os.getenv('MATRIX_LAMBDA_CAP', '6'))
        self.OUTPUT_DIR = os.getenv('OUTPUT_DIR', 'results').strip() or 'results'

        # App settings
        self.APP_NAME = os.getenv('APP_NAME', 'TrustRoute')
        self.DEBUG_MODE = os.getenv('DEBUG_MODE', 'False').lower() == 'true'


# Global config instance
config = Config()
