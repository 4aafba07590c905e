from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, List, Optional, Sequence, TypeVar

from tqdm import tqdm

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_THREADS = 4


def ordered_map(fn: Callable[[T], R],
                items: Sequence[T],
                threads: Optional[int] = None,
                desc: Optional[str] = None,
                progress: bool = False) -> List[R]:
  """Apply `fn` to every item on a thread pool and return results in input order.

  Args:
      fn: work function, must not depend on execution order.
      items: work units.
      threads: worker count, None or 1 runs inline.
      desc: progress bar label.
      progress: show a tqdm progress bar.

  Returns:
      list: `[fn(item) for item in items]`, identical for every thread count.
  """
  items = list(items)
  if not items:
    return []
  threads = threads or 1
  if threads <= 1 or len(items) == 1:
    return [fn(item) for item in tqdm(items, desc=desc, disable=not progress)]

  results: List[Optional[R]] = [None] * len(items)
  with ThreadPoolExecutor(max_workers=threads) as executor:
    futures = {executor.submit(fn, item): index for index, item in enumerate(items)}
    with tqdm(total=len(items), desc=desc, disable=not progress) as progress_bar:
      for future in as_completed(futures):
        results[futures[future]] = future.result()
        progress_bar.update()
  return results
