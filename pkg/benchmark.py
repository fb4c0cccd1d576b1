from lkms_thermal import QuadratureConfig
from lkms_thermal.thermal_wightman import regular_part_rest_frame
import time

print("Benchmarking the regular part W...")

quadrature_only = QuadratureConfig(use_closed_form=False)
points = [(0.0, 0.0), (0.5, 1.0), (-1.5, 2.5), (1.9, 0.1)]

for b in [0.5, 1.0, 2.0]:
    for label, cfg in [("closed form", QuadratureConfig()), ("quadrature", quadrature_only)]:
        start = time.time()
        for _ in range(10):
            for t, r in points:
                regular_part_rest_frame(b, t, r, 0.0, cfg)
        end = time.time()
        avg_time = (end - start) / (10 * len(points))
        print(f"b={b} {label}: {avg_time * 1e3:.4f} ms per evaluation")

start = time.time()
for t, r in points:
    regular_part_rest_frame(1.0, t, r, 1.0, QuadratureConfig())
end = time.time()
print(f"m=1 quadrature: {(end - start) / len(points) * 1e3:.4f} ms per evaluation")

print("Benchmark complete!")
