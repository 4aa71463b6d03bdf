"""
Run-registry initialization script for vibronic-sync.
Creates tables and tests the database connection.
"""

import logging
from pathlib import Path
from typing import Optional

import yaml

from .connection import DatabaseConnection
from .models import Base

logger = logging.getLogger(__name__)


def load_config(path: Optional[Path] = None) -> dict:
    """
    Load application configuration from application.yaml.

    Returns:
        dict: Application configuration
    """
    config_path = path or Path(__file__).parent.parent / "application.yaml"

    try:
        with open(config_path, 'r') as file:
            config = yaml.safe_load(file)
        return config or {}
    except FileNotFoundError:
        logger.error(f"Configuration file not found: {config_path}")
        raise
    except yaml.YAMLError as e:
        logger.error(f"Error parsing configuration file: {e}")
        raise


def init_database(db_config: Optional[dict] = None) -> Optional[DatabaseConnection]:
    """
    Initialize the run registry by creating tables and testing the connection.

    Args:
        db_config: Database settings; read from application.yaml when omitted

    Returns:
        DatabaseConnection: Ready connection, or None on failure
    """
    try:
        if db_config is None:
            db_config = load_config().get('database', {})

        db_connection = DatabaseConnection(db_config)

        if not db_connection.connect():
            logger.error("Failed to connect to run registry")
            return None

        db_connection.create_tables(Base)

        if not db_connection.test_connection():
            logger.error("Run registry connection test failed after table creation")
            return None

        logger.info("Run registry initialization completed successfully")
        return db_connection

    except Exception as e:
        logger.error(f"Run registry initialization failed: {str(e)}")
        return None


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    if init_database():
        print("✅ Run registry initialization completed successfully")
    else:
        print("❌ Run registry initialization failed")
        exit(1)
