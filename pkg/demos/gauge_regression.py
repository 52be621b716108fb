"""Convert the shipped strain-gauge recording to port forces and fit each channel."""
from importlib import resources

from auxgrip.sensors import fit_series, load_series

path = resources.files("auxgrip").joinpath("data", "aux_45.csv")
series = load_series(path, label="45")
print(f"{len(series)} samples over {series.t[-1]:.1f} s")
for ch, f in fit_series(series).items():
    width = (f.pred_hi - f.pred_lo).mean()
    print(f"{ch}: peak {f.y.max():.3f} N  R2 {f.r2:.4f}  adj {f.adj_r2:.4f}  "
          f"RSS {f.rss:.4f}  mean prediction band {width:.3f} N")
