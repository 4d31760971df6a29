"""Lines, candidate grids and partitions on a small frame.

Walks through the (rho, phi) convention, clipping a line to the frame,
the candidate grid and its neighborhoods, and the region partition that
a set of lines induces.
"""
import math

from semline import ImageFrame, Line, generate, neighborhood, partition, pixels_along, to_endpoints

frame = ImageFrame(401, 401)

# rho is measured from the frame center; phi=0 is a horizontal line
horizontal = Line(0.0, 0.0)
vertical = Line(0.0, math.pi / 2)
print("horizontal endpoints:", to_endpoints(horizontal, frame))
print("vertical endpoints:  ", to_endpoints(vertical, frame))
print("pixels on the horizontal:", len(pixels_along(horizontal, frame)))

# positive rho moves a phi=0 line upward (toward smaller y)
print("rho=50, phi=0 endpoints:", to_endpoints(Line(50.0, 0.0), frame))

grid = generate(frame, rho_bins=30, phi_bins=30)
print(f"\ngrid: {grid.size} candidates, {int(grid.valid.sum())} cross the frame")
print(f"rho step {grid.rho_step:.2f} px, phi step {math.degrees(grid.phi_step):.1f} deg")
k = grid.index(15, 0)
print("candidate", k, "->", grid.params(k))
print("5x5 neighborhood size in the middle:", len(neighborhood(grid, k, 2)))
print("at the rho edge:", len(neighborhood(grid, grid.index(0, 10), 2)))

part = partition([horizontal, vertical], frame)
print("\ncross partition:", part.region_count, "regions, areas", part.areas.tolist())
