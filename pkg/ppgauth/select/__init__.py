from ppgauth.select.pipeline import SelectionModel, fit_selection, load_selection, save_selection

__all__ = ["SelectionModel", "fit_selection", "load_selection", "save_selection"]
