"""Order-preserving process fan-out."""

from concurrent.futures import ProcessPoolExecutor


def ordered_map(fn, items, workers=1):
    """``[fn(i) for i in items]``, optionally spread over worker processes.

    Results come back in input order, so downstream reductions do not depend
    on scheduling.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))
