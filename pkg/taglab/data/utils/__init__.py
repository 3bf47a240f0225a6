from .splitter import FoldSplit, load_split_file, make_folds, write_split_file

__all__ = ["FoldSplit", "make_folds", "load_split_file", "write_split_file"]
