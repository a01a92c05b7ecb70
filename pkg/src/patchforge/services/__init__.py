"""
Services: the use cases behind each CLI command.

Modules are imported directly (``from patchforge.services.train_service
import train_patch``); the dataset package depends on the exchange service,
so this package imports nothing eagerly.
"""
