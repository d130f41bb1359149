/* generated banner generated banner generated banner generated banner */