from ppgauth.features.extract import FEATURE_NAMES, GROUPS, extract_all, normalize_beat

__all__ = ["FEATURE_NAMES", "GROUPS", "extract_all", "normalize_beat"]
