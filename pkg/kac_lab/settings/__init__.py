import importlib
import os
from typing import Any, Dict, Optional

DEFAULT_SETTINGS_MODULE = "kac_lab.settings.dev"


def get_settings(module: Optional[str] = None) -> Dict[str, Any]:
    """Load a settings module and return its UPPER_CASE names.

    The module is taken from the argument, then from the KAC_LAB_SETTINGS
    environment variable, then defaults to the dev settings.
    """
    name = module or os.getenv("KAC_LAB_SETTINGS", DEFAULT_SETTINGS_MODULE)
    settings_module = importlib.import_module(name)
    return {
        key: getattr(settings_module, key)
        for key in dir(settings_module)
        if key.isupper()
    }
