#!/usr/bin/env python3
"""Convert a MovieLens-100k directory (u.data, u.item) into the
ratings.csv / movies.csv layout used by the MovieLens "latest" releases.

usage: ml100k_to_csv.py <ml-100k dir> <out dir>
"""
import csv
import os
import sys

GENRES = [
    "(no genres listed)", "Action", "Adventure", "Animation", "Children",
    "Comedy", "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir",
    "Horror", "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War",
    "Western",
]


def main(src, dst):
    os.makedirs(dst, exist_ok=True)
    with open(os.path.join(src, "u.data")) as f, \
            open(os.path.join(dst, "ratings.csv"), "w", newline="") as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["userId", "movieId", "rating", "timestamp"])
        for line in f:
            user, movie, rating, ts = line.split()
            w.writerow([user, movie, f"{float(rating):.1f}", ts])
    with open(os.path.join(src, "u.item"), encoding="latin-1") as f, \
            open(os.path.join(dst, "movies.csv"), "w", newline="") as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["movieId", "title", "genres"])
        for line in f:
            parts = line.rstrip("\n").split("|")
            flags = parts[5:5 + len(GENRES)]
            tags = [g for g, on in zip(GENRES, flags) if on == "1"]
            if len(tags) > 1 and GENRES[0] in tags:
                tags.remove(GENRES[0])
            w.writerow([parts[0], parts[1], "|".join(tags) or GENRES[0]])


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
